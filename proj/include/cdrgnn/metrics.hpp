#pragma once

#include "cdrgnn/metrics/mae.hpp"
#include "cdrgnn/metrics/report.hpp"
#include "cdrgnn/metrics/temporal.hpp"
#include "cdrgnn/metrics/wilcoxon.hpp"
