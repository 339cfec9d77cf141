#ifndef ENSDIV_ENSDIV_HPP
#define ENSDIV_ENSDIV_HPP

#define ENSDIV_VERSION "0.1.0"

#include "ensdiv/bayes.hpp"
#include "ensdiv/ensemble.hpp"
#include "ensdiv/error.hpp"
#include "ensdiv/functional.hpp"
#include "ensdiv/inference.hpp"
#include "ensdiv/io.hpp"
#include "ensdiv/knn.hpp"
#include "ensdiv/plug_in.hpp"
#include "ensdiv/point_set.hpp"
#include "ensdiv/qda.hpp"
#include "ensdiv/random.hpp"
#include "ensdiv/simulate.hpp"
#include "ensdiv/stats.hpp"
#include "ensdiv/weights.hpp"

#endif  // ENSDIV_ENSDIV_HPP
