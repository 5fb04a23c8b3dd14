#pragma once

#include "risocc/rng.hpp"
#include "risocc/geometry.hpp"
#include "risocc/channel.hpp"
#include "risocc/signal.hpp"
#include "risocc/objective.hpp"
#include "risocc/optimizer.hpp"
#include "risocc/sensing.hpp"
#include "risocc/config.hpp"
#include "risocc/io.hpp"
#include "risocc/experiments.hpp"
