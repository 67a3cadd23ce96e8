#pragma once

#include "error.hpp"
#include "generators.hpp"
#include "independence.hpp"
#include "kernel_operator.hpp"
#include "lemma_battery.hpp"
#include "mixed_distribution.hpp"
#include "quantile.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "transform.hpp"
