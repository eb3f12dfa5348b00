#pragma once

// Everything except the HTTP transport (keysig/http_client.hpp), which pulls
// in cpp-httplib.

#include "keysig/corpus.hpp"
#include "keysig/error.hpp"
#include "keysig/jsonl.hpp"
#include "keysig/llm_client.hpp"
#include "keysig/matching.hpp"
#include "keysig/metrics.hpp"
#include "keysig/parallel.hpp"
#include "keysig/phrasing.hpp"
#include "keysig/prompting.hpp"
#include "keysig/scoring.hpp"
#include "keysig/selection.hpp"
#include "keysig/stopwords.hpp"
#include "keysig/utf8.hpp"
