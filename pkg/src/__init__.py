"""realopt - Real-options valuation with binomial trees and random cash flows."""

__version__ = "0.1.0"
