import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'happy-dom',
    testTimeout: 30_000,
    hookTimeout: 90_000,
    // e2e spawns one shared service per file; keep files sequential so
    // unit and e2e runs do not compete for CPU during timing waits.
    fileParallelism: false,
  },
});
