import { defineConfig } from "vitest/config";

// /api is proxied to the qc service in dev so the console stays a pure
// same-origin client; QC_SERVICE overrides the target.
export default defineConfig({
  server: {
    proxy: {
      "/api": {
        target: process.env.QC_SERVICE ?? "http://127.0.0.1:8000",
        changeOrigin: true,
      },
    },
  },
  test: {
    environment: "node",
    globalSetup: "./tests/setup-service.ts",
    testTimeout: 30000,
    hookTimeout: 120000,
  },
});
