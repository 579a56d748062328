// Umbrella header for the afcmem library.
#pragma once

#include "afc/comb_model.hpp"
#include "afc/csv.hpp"
#include "afc/errors.hpp"
#include "afc/estimation.hpp"
#include "afc/fft.hpp"
#include "afc/json_io.hpp"
#include "afc/least_squares.hpp"
#include "afc/propagation.hpp"
#include "afc/protocol.hpp"
#include "afc/signal.hpp"
#include "afc/spinwave.hpp"
