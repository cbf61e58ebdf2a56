"""Physical constants (CODATA 2018), SI units throughout."""

BOLTZMANN = 1.380649e-23        # J/K (exact)
HBAR = 1.054571817e-34          # J*s
PLANCK = 6.62607015e-34         # J*s (exact)
SPEED_OF_LIGHT = 299792458.0    # m/s (exact)
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m

# conventional lab defaults
ROOM_TEMPERATURE = 300.0        # K
SILICA_DENSITY = 1850.0         # kg/m^3, amorphous silica nanospheres
SILICA_INDEX = 1.45             # refractive index at 1550 nm
AIR_VISCOSITY = 18.6e-6         # Pa*s at 300 K
AIR_MOLECULE_DIAMETER = 0.37e-9  # m, effective kinetic diameter

MBAR = 100.0                    # Pa per mbar
