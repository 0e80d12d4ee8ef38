"""Tests for Cascada."""
