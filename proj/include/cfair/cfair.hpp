#pragma once

#include "cfair/concurrency.hpp"
#include "cfair/config.hpp"
#include "cfair/corpus.hpp"
#include "cfair/error.hpp"
#include "cfair/evalset.hpp"
#include "cfair/generate.hpp"
#include "cfair/lexicon.hpp"
#include "cfair/llm.hpp"
#include "cfair/metrics.hpp"
#include "cfair/predictions.hpp"
#include "cfair/report.hpp"
#include "cfair/scorer.hpp"
#include "cfair/scorer_client.hpp"
#include "cfair/types.hpp"
