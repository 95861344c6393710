"""Test suite for the Picost workbench"""
