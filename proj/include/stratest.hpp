#pragma once

#include "stratest/commands.hpp"
#include "stratest/domain.hpp"
#include "stratest/error.hpp"
#include "stratest/estimators.hpp"
#include "stratest/io.hpp"
#include "stratest/moments.hpp"
#include "stratest/mse_theory.hpp"
#include "stratest/report.hpp"
#include "stratest/simulate.hpp"
