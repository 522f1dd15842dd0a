"""
Casimir force-fluctuation toolkit: atomic oscillator model, frequency averaging,
tip-sample geometry integrals and cantilever noise predictions.
"""
