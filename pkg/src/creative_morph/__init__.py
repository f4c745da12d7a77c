"""Single-view 3D style transfer: symmetric shape blending + semantic UV texture stylization."""

__version__ = "0.1.0"
