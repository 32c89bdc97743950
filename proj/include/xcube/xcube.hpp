#pragma once

// Umbrella header: the whole engine plus the HTTP service.

#include "xcube/catalog.hpp"
#include "xcube/connection_summary.hpp"
#include "xcube/context_summary.hpp"
#include "xcube/corpus_store.hpp"
#include "xcube/cube_builder.hpp"
#include "xcube/dataguide.hpp"
#include "xcube/engine.hpp"
#include "xcube/materializer.hpp"
#include "xcube/path_index.hpp"
#include "xcube/query.hpp"
#include "xcube/service.hpp"
#include "xcube/topk.hpp"
