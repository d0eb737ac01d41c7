"""Attention U-Net trainer for the inkstone binarization pipeline."""

__version__ = "0.1.0"
