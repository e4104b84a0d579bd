#pragma once

// Umbrella header for the whole library.

#include "clinsim/affect.hpp"
#include "clinsim/backend.hpp"
#include "clinsim/clock.hpp"
#include "clinsim/cohort.hpp"
#include "clinsim/cohortgen.hpp"
#include "clinsim/config.hpp"
#include "clinsim/csv.hpp"
#include "clinsim/embedding.hpp"
#include "clinsim/emotions.hpp"
#include "clinsim/errors.hpp"
#include "clinsim/hashing.hpp"
#include "clinsim/http_backend.hpp"
#include "clinsim/judge.hpp"
#include "clinsim/memory.hpp"
#include "clinsim/orchestrator.hpp"
#include "clinsim/packet.hpp"
#include "clinsim/patient.hpp"
#include "clinsim/prompts.hpp"
#include "clinsim/report.hpp"
#include "clinsim/rubric.hpp"
#include "clinsim/scripted_backends.hpp"
#include "clinsim/task_matrix.hpp"
