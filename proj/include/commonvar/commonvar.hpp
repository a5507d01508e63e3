#pragma once

#include "commonvar/error.hpp"
#include "commonvar/linalg.hpp"
#include "commonvar/rng.hpp"
#include "commonvar/graph.hpp"
#include "commonvar/laplacian.hpp"
#include "commonvar/minimax.hpp"
#include "commonvar/diffusion.hpp"
#include "commonvar/stats.hpp"
#include "commonvar/io.hpp"
