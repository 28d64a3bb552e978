"""Adaptive-oscillator models of speech rhythm.

Modules:

- :mod:`rhythmdyn.oscillator` -- adaptive oscillator, entrainment, synchrony
- :mod:`rhythmdyn.beats` -- acoustic beat extraction from audio
- :mod:`rhythmdyn.meter` -- two-level meter induction with an oscillator bank
- :mod:`rhythmdyn.analysis` -- phase modes, mora regression, tempo judgements
- :mod:`rhythmdyn.stimuli` -- seedable stimulus generators
"""

__version__ = "0.1.0"
