"""Test package for qbattery."""
