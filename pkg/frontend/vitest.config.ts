import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    // regenerating acceptance run logs through the Python CLI takes ~40s
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
