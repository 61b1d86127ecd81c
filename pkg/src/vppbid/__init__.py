"""Offering strategies for a wind + demand-response portfolio in day-ahead, intraday and balancing markets."""
__version__ = "0.1.0"
