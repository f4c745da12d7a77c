import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    exclude: process.env.RUN_E2E ? [] : ["tests/e2e.smoke.test.ts"],
    testTimeout: 15000,
  },
});
