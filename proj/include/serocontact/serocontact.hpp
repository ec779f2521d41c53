#pragma once

#include "serocontact/age_grid.hpp"
#include "serocontact/bootstrap.hpp"
#include "serocontact/bspline.hpp"
#include "serocontact/common.hpp"
#include "serocontact/config.hpp"
#include "serocontact/contact_matrix.hpp"
#include "serocontact/contact_surface.hpp"
#include "serocontact/contact_survey.hpp"
#include "serocontact/csv.hpp"
#include "serocontact/demography.hpp"
#include "serocontact/foi.hpp"
#include "serocontact/model_selection.hpp"
#include "serocontact/optim.hpp"
#include "serocontact/pipeline.hpp"
#include "serocontact/rng.hpp"
#include "serocontact/serology.hpp"
#include "serocontact/simulate.hpp"
#include "serocontact/stats.hpp"
#include "serocontact/transmission.hpp"
#include "serocontact/waifw.hpp"
