#pragma once

#include "lts/checkpoint.hpp"
#include "lts/compare.hpp"
#include "lts/config.hpp"
#include "lts/curriculum.hpp"
#include "lts/error.hpp"
#include "lts/eval.hpp"
#include "lts/gnn.hpp"
#include "lts/gradcheck.hpp"
#include "lts/graph_io.hpp"
#include "lts/hetero_graph.hpp"
#include "lts/optimizer.hpp"
#include "lts/trainer.hpp"
#include "lts/version.hpp"
