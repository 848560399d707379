from experiments.window_models import (forecast_caviar_adaptive, forecast_caviar_as, forecast_caviar_ig,
                                       forecast_caviar_sav, forecast_dfgarch, forecast_gpd_ngarch,
                                       forecast_gpd_tgarch, forecast_llqar, forecast_ngarch, forecast_oracle,
                                       forecast_qar1, forecast_tgarch)
from helpers.common import ChoiceEnum


class ModelId(ChoiceEnum):
    NGARCH = "nGARCH"
    TGARCH = "tGARCH"
    DFGARCH = "DFGARCH"
    GPD_NGARCH = "gpdNGARCH"
    GPD_TGARCH = "gpdTGARCH"
    QAR1 = "QAR1"
    LLQAR = "LLQAR"
    CAVIAR_SAV = "CAViaR-SAV"
    CAVIAR_AS = "CAViaR-AS"
    CAVIAR_IG = "CAViaR-IG"
    CAVIAR_ADAPTIVE = "CAViaR-Adaptive"
    ORACLE = "Oracle"

    @property
    def is_caviar(self):
        return self.value.startswith("CAViaR")

    @property
    def has_es(self):
        """CAViaR kinds forecast VaR only."""
        return not self.is_caviar

    @property
    def needs_truth(self):
        return self == ModelId.ORACLE


forecasters = {
    ModelId.NGARCH: forecast_ngarch,
    ModelId.TGARCH: forecast_tgarch,
    ModelId.DFGARCH: forecast_dfgarch,
    ModelId.GPD_NGARCH: forecast_gpd_ngarch,
    ModelId.GPD_TGARCH: forecast_gpd_tgarch,
    ModelId.QAR1: forecast_qar1,
    ModelId.LLQAR: forecast_llqar,
    ModelId.CAVIAR_SAV: forecast_caviar_sav,
    ModelId.CAVIAR_AS: forecast_caviar_as,
    ModelId.CAVIAR_IG: forecast_caviar_ig,
    ModelId.CAVIAR_ADAPTIVE: forecast_caviar_adaptive,
    ModelId.ORACLE: forecast_oracle,
}
