#pragma once

#include "cdrgnn/models/architectures.hpp"
#include "cdrgnn/models/batch.hpp"
#include "cdrgnn/models/config.hpp"
#include "cdrgnn/models/loss.hpp"
#include "cdrgnn/models/train.hpp"
