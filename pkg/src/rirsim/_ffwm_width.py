"""Generated by scripts/calibrate_ffwm_width.py; do not edit by hand.

Ratio of the stationary four-wave-mixing FWHM to the Doppler width.  The
stationary lineshape is universal in detuning units of the Doppler width,
so this single calibrated number converts measured FWHM values into Doppler
widths (and from there into temperatures) at any parameter set.
"""

FFWM_FWHM_OVER_DOPPLER_WIDTH = 2.5617498001478007
