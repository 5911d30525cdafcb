"""clDice similarity, soft-clDice loss and digital-topology checks for tubular masks."""

__version__ = "0.1.0"
