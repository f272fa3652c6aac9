#pragma once

#include "zqoc/algebra.hpp"
#include "zqoc/brachistochrone.hpp"
#include "zqoc/navigation.hpp"
#include "zqoc/reduction.hpp"
#include "zqoc/roots.hpp"
