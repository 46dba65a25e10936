#pragma once

#include "labeldec/common.hpp"
#include "labeldec/decoder_advanced.hpp"
#include "labeldec/decoder_simple.hpp"
#include "labeldec/label_units.hpp"
#include "labeldec/lexicon.hpp"
#include "labeldec/lm.hpp"
#include "labeldec/metrics.hpp"
#include "labeldec/scorer.hpp"
#include "labeldec/target_encoding.hpp"
#include "labeldec/version.hpp"
