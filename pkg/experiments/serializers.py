from rest_framework import serializers

from mri.masks import MaskKind
from spectral.autodiff import FRECHET_MODES
from spectral.mixer import AxisMode, Variant


class ExperimentConfigSerializer(serializers.Serializer):
    """Serializer for a merged key=value experiment configuration."""
    height = serializers.IntegerField(min_value=7, default=64)
    width = serializers.IntegerField(min_value=7, default=64)
    channels = serializers.IntegerField(min_value=2, default=8)
    bins_h = serializers.IntegerField(min_value=1, default=9)
    bins_w = serializers.IntegerField(min_value=1, default=9)
    blocks = serializers.IntegerField(min_value=1, default=2)
    variant = serializers.ChoiceField(choices=[v.value for v in Variant], default=Variant.CHASM.value)
    axis_mode = serializers.ChoiceField(choices=[m.value for m in AxisMode], default=AxisMode.CH_THEN_CW.value)
    mask = serializers.ChoiceField(choices=[k.value.lower() for k in MaskKind], default='structured')
    accel = serializers.FloatField(min_value=1.0, default=4.0)
    center_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)
    random_keep_center = serializers.BooleanField(default=False)
    loss = serializers.ChoiceField(choices=['l1', 'l2'], default='l1')
    lr = serializers.FloatField(default=5e-4)
    beta1 = serializers.FloatField(min_value=0.0, default=0.9)
    beta2 = serializers.FloatField(min_value=0.0, default=0.999)
    eps = serializers.FloatField(default=1e-8)
    weight_decay = serializers.FloatField(min_value=0.0, default=0.01)
    batch_size = serializers.IntegerField(min_value=1, default=8)
    steps = serializers.IntegerField(min_value=0, default=2000)
    eval_every = serializers.IntegerField(min_value=1, default=200)
    seeds = serializers.CharField(default='0,1,2')
    train_phantoms = serializers.IntegerField(min_value=1, default=200)
    val_phantoms = serializers.IntegerField(min_value=1, default=32)
    test_phantoms = serializers.IntegerField(min_value=1, default=32)
    n_ellipses = serializers.IntegerField(min_value=0, default=8)
    data_seed = serializers.IntegerField(min_value=0, default=1234)
    lift_init_scale = serializers.FloatField(min_value=0.0, default=0.1)
    frechet_mode = serializers.ChoiceField(choices=list(FRECHET_MODES), default='directional')
    out_dir = serializers.CharField(default='runs')

    def validate_seeds(self, value):
        try:
            seeds = [int(s) for s in str(value).split(',') if s.strip()]
        except ValueError:
            raise serializers.ValidationError('Seeds must be comma-separated integers')
        if not seeds:
            raise serializers.ValidationError('At least one seed is required')
        if any(s < 0 for s in seeds):
            raise serializers.ValidationError('Seeds must be non-negative')
        return seeds

    def validate(self, attrs):
        if attrs['lr'] <= 0:
            raise serializers.ValidationError({'lr': 'Learning rate must be positive'})
        if attrs['eps'] <= 0:
            raise serializers.ValidationError({'eps': 'eps must be positive'})
        for key in ('beta1', 'beta2'):
            if attrs[key] >= 1.0:
                raise serializers.ValidationError({key: 'Betas must be below 1'})
        if attrs['accel'] > attrs['width']:
            raise serializers.ValidationError({'accel': 'Acceleration cannot exceed the number of lines'})
        return attrs
