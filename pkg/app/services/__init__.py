"""Services package: one module per toolkit area."""
