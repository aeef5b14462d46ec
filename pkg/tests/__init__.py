# Test module for adaptive_wave
