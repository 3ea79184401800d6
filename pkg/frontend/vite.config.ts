import { defineConfig } from "vite";

// The control centre serves the built bundle: index.html at / and the static
// files under /ui, so assets have to resolve against that prefix. In dev the
// API and the stream are proxied to a locally running centre instead.
export default defineConfig({
  base: "/ui/",
  server: {
    proxy: {
      "/fleet": "http://127.0.0.1:7780",
      "/vehicle": "http://127.0.0.1:7780",
      "/stream": { target: "ws://127.0.0.1:7780", ws: true },
    },
  },
});
