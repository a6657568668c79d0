#pragma once

#include "cdrgnn/synthgen/calibrate.hpp"
#include "cdrgnn/synthgen/config.hpp"
#include "cdrgnn/synthgen/generate.hpp"
