"""Die-to-die link modeling: channel parasitics, adaptation, TX/RX co-optimization and EDA collateral."""

__version__ = "0.1.0"
