#pragma once

// Umbrella header.

#include "dysev/alignment.hpp"
#include "dysev/common.hpp"
#include "dysev/config.hpp"
#include "dysev/cv.hpp"
#include "dysev/experiment.hpp"
#include "dysev/features.hpp"
#include "dysev/formants.hpp"
#include "dysev/gbdt.hpp"
#include "dysev/json_io.hpp"
#include "dysev/manifest.hpp"
#include "dysev/mfcc.hpp"
#include "dysev/pitch.hpp"
#include "dysev/prosody.hpp"
#include "dysev/selection.hpp"
#include "dysev/signal.hpp"
#include "dysev/table.hpp"
#include "dysev/textgrid.hpp"
#include "dysev/voice_quality.hpp"
#include "dysev/wav.hpp"
