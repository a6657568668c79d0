#pragma once

#include "cdrgnn/edgebank/edgebank.hpp"
