"""Tests for boltzmann-py library"""
