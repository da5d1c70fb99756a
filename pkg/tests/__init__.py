"""Tests for gridtune."""
