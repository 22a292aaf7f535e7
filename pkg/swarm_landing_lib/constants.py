"""
Constants used throughout the swarm landing library.
"""

import math

SCHEMA_VERSION = 1

# Agent identifiers, in table-row order
LEADER_ID = "leader"
LEFT_ID = "left"
RIGHT_ID = "right"
AGENT_IDS = (LEADER_ID, LEFT_ID, RIGHT_ID)

# Platform geometry
PAD_HEIGHT = 0.70  # m
PAD_CAPACITY = 3
ROVER_BODY_RADIUS = 0.30  # m, not verifiable from the hardware description
TAG_SIZE = 0.166  # m, square side
TAG_OFFSET = (0.45, 0.0, -0.10)  # tag centre relative to pad centre, rover frame

# Tag detection envelope
CAMERA_MIN_RANGE = 0.30  # m
CAMERA_MAX_RANGE = 4.0  # m
CAMERA_RATE = 30.0  # Hz
CAMERA_PITCH = 0.8  # rad below horizontal
CAMERA_FOV_HALF_ANGLE = 0.75  # rad

# Drone masses (bookkeeping only)
LEADER_MASS = 0.262  # kg
FOLLOWER_MASS = 0.032  # kg

# Landing success criterion
SUCCESS_THRESHOLD = 0.15  # m

# Default rover speed sweep and static calibration target
DEFAULT_SWEEP_SPEEDS = (0.0, 0.5, 1.0, 1.5)
STATIC_TARGET_RMSE_CM = 4.48

# Sigma bracket searched by the noise calibration
SIGMA_BRACKET = (0.0, 0.2)

# APF singularity clamp
RHO_MIN = 1e-3  # m

# Termination grace after the whole swarm has touched down
TOUCHDOWN_GRACE = 1.0  # s

TWO_PI = 2.0 * math.pi

# CSV layouts, bit-exact column order
TRACE_COLUMNS = ("t", "agent_id", "x", "y", "z", "vx", "vy", "vz", "phase", "motors_on")
ROVER_COLUMNS = ("t", "x", "y", "theta", "linear_speed", "angular_speed")

# CLI exit codes
EXIT_OK = 0
EXIT_FATAL = 1
EXIT_VALIDATION = 2
EXIT_ABORTED = 3
EXIT_IO = 4

# Environment variables
ENV_THREADS = "SWARMSIM_THREADS"
ENV_VERBOSE = "SWARMSIM_VERBOSE"
ENV_OUT = "SWARMSIM_OUT"
ENV_ACCEPTANCE = "SWARMSIM_ACCEPTANCE"

# Trajectory plot
SVG_NS = "http://www.w3.org/2000/svg"
NAMESPACES = {"svg": SVG_NS}
AGENT_COLORS = {LEADER_ID: "#d62728", LEFT_ID: "#1f77b4", RIGHT_ID: "#2ca02c"}
ROVER_COLOR = "#7f7f7f"
