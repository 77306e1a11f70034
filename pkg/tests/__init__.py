"""Tests for the cuspedge package."""
