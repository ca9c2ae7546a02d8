#pragma once

// Convenience include for the whole library.

#include "robojudge/backend.hpp"
#include "robojudge/curation.hpp"
#include "robojudge/distribution.hpp"
#include "robojudge/domain.hpp"
#include "robojudge/frames.hpp"
#include "robojudge/http_backend.hpp"
#include "robojudge/metrics.hpp"
#include "robojudge/prompt.hpp"
#include "robojudge/record.hpp"
#include "robojudge/report.hpp"
#include "robojudge/runner.hpp"
#include "robojudge/stats.hpp"
#include "robojudge/util.hpp"
#include "robojudge/verdict.hpp"
