#pragma once

#include "analytics.hpp"
#include "executor.hpp"
#include "hooks.hpp"
#include "lexicon.hpp"
#include "linearizer.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "postprocess.hpp"
#include "quality_gate.hpp"
#include "sql/ast.hpp"
#include "sql/canonical.hpp"
#include "sql/keywords.hpp"
#include "sql/lexer.hpp"
#include "sql/parser.hpp"
#include "table.hpp"
#include "table_store.hpp"
#include "template_engine.hpp"
#include "util.hpp"
