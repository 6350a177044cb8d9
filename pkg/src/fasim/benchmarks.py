"""The three built-in benchmark models, as model-file text."""

STEERING = """\
name: steering
# wheel angle x drifts slowly one way and is corrected quickly the other
variables: x, y
output: cos(x)
defaults: tmax = 50
initial L1: x = pi/2

location L1:
    flow x = 0.1
    update y = cos(x)

location L2:
    flow x = -4
    update y = cos(x)

edge L1 -> L2:
    guard y <= -0.99

edge L2 -> L1:
    guard y >= 0.99
"""

ROBOT = """\
name: robot
# robot turning at a constant rate stops when it touches a parabolic wall
variables: x, y, a
output: x, y
defaults: tmax = 7
initial MOVE: x = 0, y = 0, a = 0

location MOVE:
    flow x = 5*sin(a)
    flow y = 5*cos(a)
    flow a = 0.9

location STOP:
    flow x = 0
    flow y = 0
    flow a = 0

edge MOVE -> STOP:
    guard y >= 12*x^2 - 54*x + 65
"""

WATER = """\
name: water
# heater switches on after a delay and off when the water boils
variables: timer, temp
output: temp
defaults: tmax = 20
initial S0: timer = 0, temp = 30

location S0:
    flow timer = 1
    flow temp = 0

location ON:
    flow timer = 1
    flow temp = 0.075*(150 - temp)

location OFF:
    flow timer = 0
    flow temp = 0

edge S0 -> ON:
    guard timer >= 5

edge ON -> OFF:
    guard temp == 100
"""

BENCHMARKS = {"steering": STEERING, "robot": ROBOT, "water": WATER}
