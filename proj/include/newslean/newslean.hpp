#pragma once

// Umbrella header. The MediaWiki HTTP client lives in wiki_http.hpp and is
// not pulled in here.

#include "newslean/backbone.hpp"
#include "newslean/config.hpp"
#include "newslean/corpus.hpp"
#include "newslean/encoders.hpp"
#include "newslean/error.hpp"
#include "newslean/fusion.hpp"
#include "newslean/linalg.hpp"
#include "newslean/metrics.hpp"
#include "newslean/model.hpp"
#include "newslean/nn.hpp"
#include "newslean/plot.hpp"
#include "newslean/random.hpp"
#include "newslean/skipgram.hpp"
#include "newslean/text.hpp"
#include "newslean/topics.hpp"
#include "newslean/train.hpp"
#include "newslean/wiki.hpp"
