#pragma once

#include "dsfraud/bayes.hpp"
#include "dsfraud/combination.hpp"
#include "dsfraud/error.hpp"
#include "dsfraud/evidence.hpp"
#include "dsfraud/scoring.hpp"
