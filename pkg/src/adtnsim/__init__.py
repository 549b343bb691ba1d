"""Group-mix undetectable-communication engine and deterministic DTN simulator."""

__version__ = "0.1.0"
