"""Positioning and power allocation schemes, one `BaseScheme` subclass per module."""
