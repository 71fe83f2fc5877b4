"""Test suite for Ofertownik application"""
