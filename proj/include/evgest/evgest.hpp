#pragma once

#include "evgest/background_suppression.hpp"
#include "evgest/bench.hpp"
#include "evgest/classifier.hpp"
#include "evgest/config.hpp"
#include "evgest/error.hpp"
#include "evgest/event.hpp"
#include "evgest/hots.hpp"
#include "evgest/manifest.hpp"
#include "evgest/pipeline.hpp"
#include "evgest/random.hpp"
#include "evgest/report.hpp"
#include "evgest/synth.hpp"
#include "evgest/time_surface.hpp"
