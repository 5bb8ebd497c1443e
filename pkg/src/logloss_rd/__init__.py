"""Rate-distortion regions under logarithmic loss for CEO and multiterminal source coding."""
__version__ = "0.1.0"
