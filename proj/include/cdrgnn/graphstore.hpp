#pragma once

#include "cdrgnn/graphstore/aggregate.hpp"
#include "cdrgnn/graphstore/filter.hpp"
#include "cdrgnn/graphstore/ingest.hpp"
#include "cdrgnn/graphstore/khop.hpp"
#include "cdrgnn/graphstore/normalize.hpp"
#include "cdrgnn/graphstore/serialize.hpp"
#include "cdrgnn/graphstore/split.hpp"
#include "cdrgnn/graphstore/types.hpp"
