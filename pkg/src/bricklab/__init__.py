"""bricklab: interactive brick-assembly simulator, metrics, and tooling."""

__version__ = "0.1.0"
