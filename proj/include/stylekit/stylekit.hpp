#pragma once

#include "stylekit/core_data.hpp"
#include "stylekit/downstream.hpp"
#include "stylekit/error.hpp"
#include "stylekit/features.hpp"
#include "stylekit/genkit/c4_filter.hpp"
#include "stylekit/genkit/prompts.hpp"
#include "stylekit/genkit/provider.hpp"
#include "stylekit/quality.hpp"
#include "stylekit/sampler.hpp"
#include "stylekit/stel.hpp"
#include "stylekit/trainer.hpp"
