#pragma once

#include "cdrgnn/nn/layers.hpp"
#include "cdrgnn/nn/ops.hpp"
#include "cdrgnn/nn/params.hpp"
#include "cdrgnn/nn/tensor.hpp"
