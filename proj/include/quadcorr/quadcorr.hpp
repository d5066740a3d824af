#pragma once

#include "quadcorr/bitmap_cache.hpp"
#include "quadcorr/bitmap_io.hpp"
#include "quadcorr/error.hpp"
#include "quadcorr/experiments.hpp"
#include "quadcorr/form_id.hpp"
#include "quadcorr/forms.hpp"
#include "quadcorr/localdens.hpp"
#include "quadcorr/primes.hpp"
#include "quadcorr/rational.hpp"
#include "quadcorr/report_io.hpp"
#include "quadcorr/residue_ring.hpp"
#include "quadcorr/sieve.hpp"
