"""uavaq: fixed-wing UAV air-quality mission simulator and ground segment."""

__version__ = "0.1.0"
