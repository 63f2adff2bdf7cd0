#pragma once

// Umbrella header.

#include "locfac/numeric.hpp"
#include "locfac/cyclo.hpp"
#include "locfac/finite_field.hpp"
#include "locfac/local_field.hpp"
#include "locfac/unit_group.hpp"
#include "locfac/characters.hpp"
#include "locfac/epsilon.hpp"
#include "locfac/langlands.hpp"
#include "locfac/selfcheck.hpp"
