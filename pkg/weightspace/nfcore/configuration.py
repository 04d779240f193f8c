__all__ = ["ArchConfiguration"]

from pydantic import Field, PositiveFloat, PositiveInt
from pydantic_settings import SettingsConfigDict

from toolkit.configuration.settings import SectionSettings
from weightspace.datastore.toy import Modality

from .arch import FieldArch


class ArchConfiguration(SectionSettings):
    """
    Field architectures of a run. Unset values follow the modality: omega0 32 for images and 1 for SDFs, standalone
    widths 94 and 99, 4 and 3 modulated blocks.
    """

    model_config = SettingsConfigDict(env_prefix="WSF_ARCH_", extra="forbid")

    omega0: PositiveFloat | None = None
    standalone_width: PositiveInt | None = None
    hidden_layers: PositiveInt = 3
    num_blocks: PositiveInt | None = None
    modulated_width: PositiveInt = 64
    block_widths: tuple[PositiveInt, ...] | None = None
    latent_dim: PositiveInt = 32
    mapping_layers: PositiveInt = 2
    mapping_width: PositiveInt = 64
    demod_eps: float = Field(default=1e-8, gt=0.0)

    def _common(self) -> dict:
        values: dict = {"hidden_layers": self.hidden_layers}
        if self.omega0 is not None:
            values["omega0"] = self.omega0
        return values

    def standalone(self, modality: Modality, channels: int = 3) -> FieldArch:
        values = self._common()
        if self.standalone_width is not None:
            values["hidden_width"] = self.standalone_width
        match modality:
            case Modality.IMAGE:
                return FieldArch.image_standalone(output_dim=channels, **values)
            case Modality.SDF:
                return FieldArch.sdf_standalone(**values)

    def modulated(self, modality: Modality, channels: int = 3) -> FieldArch:
        values = self._common() | {
            "hidden_width": self.modulated_width,
            "block_widths": self.block_widths,
            "latent_dim": self.latent_dim,
            "mapping_layers": self.mapping_layers,
            "mapping_width": self.mapping_width,
            "demod_eps": self.demod_eps,
        }
        if self.num_blocks is not None:
            values["num_blocks"] = self.num_blocks
        match modality:
            case Modality.IMAGE:
                return FieldArch.image_modulated(output_dim=channels, **values)
            case Modality.SDF:
                return FieldArch.sdf_modulated(**values)
