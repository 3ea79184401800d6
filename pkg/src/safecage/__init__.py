"""Runtime safety cage and remote control centre for a simulated autonomous
delivery vehicle.

The package splits into three layers:

- onboard monitoring: zone geometry (zones), lidar filtering (lidar), camera
  validation (camera), the mode transition rules (modes) and the cage runtime
  that ties them together (cage, missions);
- the wire: length-prefixed JSON messages (protocol) and the append-only
  event log with replay (eventlog);
- off-board: the control centre registry and command dispatch
  (control_centre), its TCP/HTTP/WebSocket servers (servers), and the
  scenario runner that closes the loop against the simulator (sim, runner).
"""

__version__ = "0.1.0"
