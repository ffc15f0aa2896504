"""Test suite for Job URL Analyzer."""