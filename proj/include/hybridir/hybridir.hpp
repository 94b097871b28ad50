#pragma once

/// Umbrella header for the whole library.

#include "analyzer.hpp"
#include "cli.hpp"
#include "corpus.hpp"
#include "dense_index.hpp"
#include "eval_runner.hpp"
#include "hits.hpp"
#include "lexical_index.hpp"
#include "metrics.hpp"
#include "query_engine.hpp"
#include "rag.hpp"
#include "run_config.hpp"
#include "sparse_index.hpp"
#include "synthetic.hpp"
