import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    testTimeout: 20000,
    hookTimeout: 30000,
    // the integration tests spawn real vehicle/centre processes; keeping
    // files sequential stops them from contending for the CPU
    fileParallelism: false,
  },
});
